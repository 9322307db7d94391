from django.conf import settings as django_settings
from hypothesis import HealthCheck, settings

settings.register_profile('dev', max_examples=25, deadline=None)
settings.register_profile('ci', max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(getattr(django_settings, 'HYPOTHESIS_PROFILE', 'dev'))
