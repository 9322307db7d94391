# cr_app/reports.py
"""Report assembly and rendering for the cr management command."""
import hashlib
import json
from dataclasses import dataclass, field

from django.core.serializers.json import DjangoJSONEncoder

from .expressions import format_series
from .series import format_monomial

TEXT = 'text'
STRUCTURED = 'structured'
FORMATS = (TEXT, STRUCTURED)


def spec_digest(text):
    return 'sha256:' + hashlib.sha256(text.encode('utf-8')).hexdigest()


def format_constant(value):
    """Exact (re, im) pair, e.g. 5/1 + 0i."""
    im = value.im
    sign = '-' if im < 0 else '+'
    im_text = '0' if im == 0 else f'{abs(im).numerator}/{abs(im).denominator}'
    return f'{value.re.numerator}/{value.re.denominator} {sign} {im_text}i'


@dataclass
class Report:
    command: str
    digest: str
    outcome: str
    payload: dict = field(default_factory=dict)

    def as_dict(self):
        data = {'command': self.command, 'spec': self.digest, 'outcome': self.outcome}
        data.update(self.payload)
        return data

    def render(self, output_format=TEXT):
        if output_format == STRUCTURED:
            return json.dumps(self.as_dict(), indent=2, cls=DjangoJSONEncoder)
        return '\n'.join(_text_lines(self.as_dict()))


def _scalar(value):
    if value is None:
        return 'none'
    if isinstance(value, bool):
        return 'true' if value else 'false'
    return str(value)


def _text_lines(data, indent=0):
    pad = '  ' * indent
    for key, value in data.items():
        if isinstance(value, dict):
            yield f'{pad}{key}:'
            yield from _text_lines(value, indent + 1)
        elif isinstance(value, list) and value and all(isinstance(item, dict) for item in value):
            yield f'{pad}{key}:'
            for item in value:
                yield f'{pad}  - ' + ', '.join(f'{k}: {_scalar(v)}' for k, v in item.items())
        elif isinstance(value, list):
            yield f'{pad}{key}: ' + (', '.join(_scalar(item) for item in value) or '-')
        else:
            yield f'{pad}{key}: {_scalar(value)}'


# Payload sections

def input_section(data):
    d = data['d']
    return {
        'm': data['m'],
        'd': d,
        'order': data['order'],
        'theta': [data[f'theta{j}'] for j in range(1, d + 1)],
        'f': data.get('f') or None,
        'g': data.get('g') or None,
    }


def witness_section(witness):
    if witness is None:
        return None
    return {'monomial': witness.monomial, 'coefficient': str(witness.coefficient)}


def finite_type_section(report, max_depth):
    return {
        'dimension': report.dimension,
        'max_depth': max_depth,
        'ranks': [{'depth': depth, 'rank': rank} for depth, rank in report.span_by_depth],
        'type_length': report.type_length,
        'spanning_frame': [str(word) for word in report.spanning_frame],
    }


def step_section(step):
    return {
        'stage': step.stage,
        'identity': step.label,
        'residual': format_series(step.residual),
        'mod': step.certified_precision,
    }


def certificate_section(certificate, max_depth, t_frame):
    constant = certificate.constant
    return {
        'certificate': {
            'constant': format_constant(constant) if constant is not None else None,
            'is_real': certificate.is_real,
            'is_nonzero': certificate.is_nonzero,
            'certified_precision': certificate.certified_precision,
            'stage': certificate.stage,
            'message': certificate.message,
        },
        'defect': format_series(certificate.defect) if certificate.defect is not None else None,
        'witness': witness_section(certificate.witness),
        'finite_type': (finite_type_section(certificate.finite_type, max_depth)
                        if certificate.finite_type is not None else None),
        'steps': [step_section(step) for step in certificate.steps],
        'induction': [
            {
                'monomial': format_monomial(t_frame, step.exponent),
                'f': str(step.f_coefficient),
                'g': str(step.g_coefficient),
                'verdict': step.verdict,
            }
            for step in certificate.induction_trace
        ],
    }


def oracle_section(result, seed):
    return {
        'points': result.points,
        'seed': seed,
        'exact_order': result.order,
        'checks': [
            {
                'operation': check.operation,
                'comparisons': check.comparisons,
                'mismatches': check.mismatches,
            }
            for check in result.checks
        ],
        'first_mismatch': next((check.first_mismatch for check in result.checks
                                if check.first_mismatch), None),
    }


def fuzz_section(summary):
    return {
        'mode': summary.mode,
        'trials': summary.trials,
        'seed': summary.seed,
        'degree': summary.degree,
        'buckets': [{'outcome': name, 'count': summary.buckets[name]}
                    for name in sorted(summary.buckets)],
        'recovered': summary.recovered,
        'falsifications': summary.falsifications,
        'first_error': summary.errors[0] if summary.errors else None,
    }
