# cr_app/forms.py
from django import forms
from django.conf import settings

from .exceptions import ExpressionError
from .expressions import parse_expression
from .manifold import new_manifold
from .series import FrameKind, VariableFrame


def parse_spec_text(text):
    """key = value lines; '#' starts a comment, blank lines are skipped."""
    data = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise forms.ValidationError(f'line {number}: expected key = value')
        key, value = (part.strip() for part in line.split('=', 1))
        if not key or not value:
            raise forms.ValidationError(f'line {number}: expected key = value')
        if key in data:
            raise forms.ValidationError(f'line {number}: duplicate key {key!r}')
        data[key] = value
    return data


class SpecFileForm(forms.Form):
    m = forms.IntegerField(min_value=1, help_text='Number of z (and zeta) variables')
    d = forms.IntegerField(min_value=1, help_text='Codimension: number of w (and xi) variables')
    order = forms.IntegerField(min_value=2, required=False,
                               help_text='Precision N: coefficients of degree < N are known')
    f = forms.CharField(required=False, help_text='Numerator series in z, w')
    g = forms.CharField(required=False, help_text='Denominator series in z, w')

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        try:
            d = int(self.data.get('d', 0))
        except (TypeError, ValueError):
            d = 0
        for j in range(1, d + 1):
            self.fields[f'theta{j}'] = forms.CharField(
                help_text=f'Theta_{j}(zeta, z, w), the defining equation xi{j} = theta{j}')
        known = set(self.fields)
        self.unknown_keys = sorted(key for key in self.data if key not in known)

    @classmethod
    def from_text(cls, text, order=None, f=None, g=None, default_g=None):
        """Bind a form to spec file text; command line values override the file."""
        data = parse_spec_text(text)
        if default_g is not None:
            data.setdefault('g', default_g)
        if order is not None:
            data['order'] = str(order)
        if f is not None:
            data['f'] = f
        if g is not None:
            data['g'] = g
        return cls(data)

    def clean(self):
        cleaned_data = super().clean()
        if self.unknown_keys:
            raise forms.ValidationError(f"unknown keys: {', '.join(self.unknown_keys)}")
        m = cleaned_data.get('m')
        d = cleaned_data.get('d')
        if m is None or d is None:
            return cleaned_data
        if not cleaned_data.get('order'):
            cleaned_data['order'] = getattr(settings, 'CR_DEFAULT_ORDER', 8)
        order = cleaned_data['order']

        full = VariableFrame(FrameKind.FULL, m, d)
        theta = []
        for j in range(1, d + 1):
            text = cleaned_data.get(f'theta{j}')
            if text is None:
                continue
            try:
                series = parse_expression(text, m, d, order, frame=full)
            except ExpressionError as exc:
                self.add_error(f'theta{j}', str(exc))
                continue
            theta.append(series)
        cleaned_data['theta'] = theta

        t_frame = VariableFrame(FrameKind.T, m, d)
        for name in ('f', 'g'):
            text = cleaned_data.get(name)
            if not text:
                cleaned_data[f'{name}_series'] = None
                continue
            try:
                cleaned_data[f'{name}_series'] = parse_expression(text, m, d, order, frame=t_frame)
            except ExpressionError as exc:
                self.add_error(name, str(exc))
        return cleaned_data

    def theta_texts(self):
        return [self.cleaned_data[f'theta{j}'] for j in range(1, self.cleaned_data['d'] + 1)]

    def manifold(self, validate=True):
        """The validated model; raises ManifoldValidationError on semantic failures."""
        data = self.cleaned_data
        return new_manifold(data['m'], data['d'], data['theta'], data['order'], validate=validate)

    def error_text(self):
        lines = []
        for name, errors in self.errors.items():
            prefix = '' if name == '__all__' else f'{name}: '
            lines.extend(f'{prefix}{error}' for error in errors)
        return '; '.join(lines)
