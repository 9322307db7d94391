import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'crlemma.settings')
django.setup()
