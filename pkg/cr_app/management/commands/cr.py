import argparse
import logging
import sys
from pathlib import Path

from django import forms
from django.core.management.base import BaseCommand, CommandError

from cr_app import reports
from cr_app.exceptions import (
    CertificationError,
    CRError,
    FalsificationFound,
    ManifoldValidationError,
)
from cr_app.expressions import format_series
from cr_app.forms import SpecFileForm
from cr_app.manifold import Witness, finite_type_check, tangency_residuals
from cr_app.services import FuzzService, LemmaOutcome, LemmaService, OracleService, SeriesPair

logger = logging.getLogger(__name__)

USAGE = 1
VALIDATION = 2
NEGATIVE = 3
PRECISION = 4

EXIT_CODES = {
    LemmaOutcome.CONSTANT_FOUND: 0,
    LemmaOutcome.DEFECT_NONZERO: NEGATIVE,
    LemmaOutcome.NOT_FINITE_TYPE: NEGATIVE,
    LemmaOutcome.INSUFFICIENT_PRECISION: PRECISION,
}

PAIR_ACTIONS = ('verify', 'defect')


class Command(BaseCommand):
    help = 'Exact checks on CR submanifolds: validation, finite type and the constancy lemma.'

    def add_arguments(self, parser):
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument('spec', help='Path to a spec file')
        common.add_argument('--order', type=int, help='Precision N, overriding the spec file')
        common.add_argument('--format', dest='output_format', choices=reports.FORMATS,
                            default=reports.TEXT)

        depth = argparse.ArgumentParser(add_help=False)
        depth.add_argument('--max-depth', dest='max_depth', type=int,
                           help='Largest bracket depth explored (default N - 1)')

        pair = argparse.ArgumentParser(add_help=False)
        pair.add_argument('--f', dest='f', help='Numerator series in z, w')
        pair.add_argument('--g', dest='g', help='Denominator series in z, w (default 1)')

        seeded = argparse.ArgumentParser(add_help=False)
        seeded.add_argument('--seed', type=int)

        subparsers = parser.add_subparsers(dest='action', title='subcommands', required=True)
        subparsers.add_parser('check', parents=[common],
                              help='Validate a model: normalization, involution, tangency')
        subparsers.add_parser('finite-type', parents=[common, depth],
                              help='Bracket span ranks per depth and the type')
        subparsers.add_parser('verify', parents=[common, depth, pair],
                              help='Run the constancy pipeline on (f, g)')
        subparsers.add_parser('defect', parents=[common, pair],
                              help='Print the restricted reality defect of (f, g)')
        real = subparsers.add_parser('real', parents=[common, depth],
                                     help='Check that a series real on the model is constant')
        real.add_argument('--f', dest='f', help='Series in z, w')
        oracle = subparsers.add_parser('eval-oracle', parents=[common, pair, seeded],
                                       help='Cross-check symbolic results at random points')
        oracle.add_argument('--points', type=int)
        fuzz = subparsers.add_parser('fuzz', parents=[common, depth, seeded],
                                     help='Random pairs against the constancy lemma')
        fuzz.add_argument('--trials', type=int)
        fuzz.add_argument('--degree', type=int)
        fuzz.add_argument('--mode', choices=FuzzService.MODES, default='generic')

    def run_from_argv(self, argv):
        try:
            super().run_from_argv(argv)
        except CommandError as exc:
            # raised by the subcommand parsers before execute() runs
            self.stderr.write(f'CommandError: {exc}')
            sys.exit(USAGE)

    def handle(self, *args, **options):
        action = options['action']
        path = Path(options['spec'])
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as exc:
            raise CommandError(f'cannot read {path}: {exc.strerror}', returncode=USAGE)

        g = '1' if action == 'real' else options.get('g')
        try:
            form = SpecFileForm.from_text(
                text, order=options['order'], f=options.get('f'), g=g,
                default_g='1' if action in PAIR_ACTIONS else None)
        except forms.ValidationError as exc:
            raise CommandError(f'invalid spec file: {"; ".join(exc.messages)}', returncode=USAGE)
        if not form.is_valid():
            raise CommandError(f'invalid spec file: {form.error_text()}', returncode=USAGE)
        max_depth = options.get('max_depth')
        if max_depth is not None and max_depth < 1:
            raise CommandError('--max-depth must be at least 1', returncode=USAGE)

        handler = getattr(self, 'handle_' + action.replace('-', '_'))
        self.digest = reports.spec_digest(text)
        try:
            report, returncode, message = handler(form, options)
        except CertificationError as exc:
            # a guaranteed identity did not check
            logger.error('%s: certification failed: %s', action, exc)
            raise CommandError(f'certification failed (internal inconsistency): {exc}',
                               returncode=VALIDATION)
        except CRError as exc:
            logger.error('%s failed: %s', action, exc)
            raise CommandError(str(exc), returncode=USAGE)

        self.stdout.write(report.render(options['output_format']))
        if returncode:
            raise CommandError(message, returncode=returncode)

    # helpers

    def _report(self, form, outcome, **payload):
        return reports.Report(self.command, self.digest, outcome,
                              {'input': reports.input_section(form.cleaned_data), **payload})

    def _model(self, form):
        """(model, None) or (None, failure triple) for a model that is rejected."""
        try:
            return form.manifold(), None
        except ManifoldValidationError as exc:
            report = self._report(form, 'fail', error=str(exc),
                                  witness=reports.witness_section(exc.witness))
            return None, (report, VALIDATION, str(exc))

    def _pair(self, form):
        data = form.cleaned_data
        if data.get('f_series') is None:
            raise CommandError('a numerator series is required (--f or f = ... in the spec file)',
                               returncode=USAGE)
        try:
            return SeriesPair(data['f_series'], data['g_series'])
        except CRError as exc:
            raise CommandError(str(exc), returncode=USAGE)

    # subcommands

    def handle_check(self, form, options):
        self.command = 'check'
        model, failure = self._model(form)
        if failure:
            return failure
        residuals = tangency_residuals(model)
        failing = [label for label, residual in residuals if not residual.is_zero]
        report = self._report(
            form, 'fail' if failing else 'pass',
            involution='pass',
            tangency=[{'identity': label, 'residual': format_series(residual),
                       'mod': residual.precision} for label, residual in residuals],
        )
        if failing:
            return report, VALIDATION, f"tangency fails for {', '.join(failing)}"
        return report, 0, ''

    def handle_finite_type(self, form, options):
        self.command = 'finite-type'
        model, failure = self._model(form)
        if failure:
            return failure
        max_depth = options.get('max_depth')
        if max_depth is None:
            max_depth = model.precision - 1
        result = finite_type_check(model, max_depth)
        return self._report(form, result.outcome.value,
                            **reports.finite_type_section(result, max_depth)), 0, ''

    def _certificate_report(self, form, model, service, certificate):
        report = self._report(form, certificate.outcome.value,
                              **reports.certificate_section(certificate, service.max_depth,
                                                            model.t_frame))
        return report, EXIT_CODES[certificate.outcome], certificate.message

    def handle_verify(self, form, options):
        self.command = 'verify'
        model, failure = self._model(form)
        if failure:
            return failure
        pair = self._pair(form)
        service = LemmaService(model, options.get('max_depth'))
        return self._certificate_report(form, model, service, service.verify_lemma(pair))

    def handle_real(self, form, options):
        self.command = 'real'
        model, failure = self._model(form)
        if failure:
            return failure
        pair = self._pair(form)
        service = LemmaService(model, options.get('max_depth'))
        return self._certificate_report(form, model, service, service.verify_real_constant(pair.f))

    def handle_defect(self, form, options):
        self.command = 'defect'
        model, failure = self._model(form)
        if failure:
            return failure
        defect = LemmaService(model).reality_defect(self._pair(form))
        report = self._report(form, 'zero' if defect.is_zero else 'nonzero',
                              defect=format_series(defect), mod=defect.precision,
                              witness=reports.witness_section(Witness.of(defect)))
        return report, 0, ''

    def handle_eval_oracle(self, form, options):
        self.command = 'eval-oracle'
        data = form.cleaned_data
        oracle = OracleService(data['m'], data['d'], form.theta_texts(), f=data.get('f') or None,
                               g=data.get('g') or None, points=options.get('points'),
                               seed=options.get('seed'))
        result = oracle.run()
        outcome = 'mismatch' if result.mismatches else 'agree'
        report = self._report(form, outcome, **reports.oracle_section(result, oracle.seed))
        if result.mismatches:
            return report, VALIDATION, f'{result.mismatches} oracle mismatches'
        return report, 0, ''

    def handle_fuzz(self, form, options):
        self.command = 'fuzz'
        model, failure = self._model(form)
        if failure:
            return failure
        service = FuzzService(model, options.get('max_depth'), trials=options.get('trials'),
                              seed=options.get('seed'), degree=options.get('degree'),
                              mode=options['mode'])
        try:
            summary = service.run()
        except FalsificationFound as exc:
            report = self._report(form, 'falsified', mode=service.mode, seed=service.seed,
                                  error=str(exc), instance=exc.instance)
            return report, VALIDATION, str(exc)
        if summary.errors:
            report = self._report(form, 'failed', **reports.fuzz_section(summary))
            return report, VALIDATION, f'{len(summary.errors)} fuzz trials failed; {summary.errors[0]}'
        return self._report(form, 'completed', **reports.fuzz_section(summary)), 0, ''
