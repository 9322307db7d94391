from io import StringIO
from pathlib import Path
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from cr_app import reports
from cr_app.exceptions import CertificationError

SPECS = Path(__file__).resolve().parents[2] / 'specs'
GOLDEN = Path(__file__).resolve().parent / 'golden'


def spec(name):
    return str(SPECS / f'{name}.spec')


class CrCommandTestCase(SimpleTestCase):
    def run_cr(self, *args):
        """(stdout, returncode) of `manage.py cr ...`."""
        out = StringIO()
        try:
            call_command('cr', *args, stdout=out, stderr=StringIO())
        except CommandError as exc:
            return out.getvalue(), exc.returncode
        return out.getvalue(), 0

    def golden(self, filename, spec_name):
        text = (GOLDEN / filename).read_text(encoding='utf-8')
        digest = reports.spec_digest(Path(spec(spec_name)).read_text(encoding='utf-8'))
        return text.replace('{digest}', digest)


class GoldenReportTests(CrCommandTestCase):
    def test_finite_type_heisenberg(self):
        out, rc = self.run_cr('finite-type', spec('heisenberg'), '--max-depth', '4')
        self.assertEqual(rc, 0)
        self.assertEqual(out, self.golden('finite_type_heisenberg.txt', 'heisenberg'))

    def test_check_heisenberg(self):
        out, rc = self.run_cr('check', spec('heisenberg'))
        self.assertEqual(rc, 0)
        self.assertEqual(out, self.golden('check_heisenberg.txt', 'heisenberg'))

    def test_check_rejects_real_coefficient(self):
        out, rc = self.run_cr('check', spec('real_coefficient'))
        self.assertEqual(rc, 2)
        self.assertEqual(out, self.golden('check_real_coefficient.txt', 'real_coefficient'))

    def test_verify_constant_found(self):
        out, rc = self.run_cr('verify', spec('heisenberg'),
                              '--f', '5 + 5*z1 + 5*w1', '--g', '1 + z1 + w1')
        self.assertEqual(rc, 0)
        self.assertEqual(out, self.golden('verify_heisenberg_constant.txt', 'heisenberg'))

    def test_verify_defect_nonzero(self):
        out, rc = self.run_cr('verify', spec('heisenberg'), '--f', 'w1', '--g', '1')
        self.assertEqual(rc, 3)
        self.assertEqual(out, self.golden('verify_heisenberg_defect.txt', 'heisenberg'))

    def test_verify_levi_flat_structured(self):
        out, rc = self.run_cr('verify', spec('levi_flat'), '--f', 'w1', '--format', 'structured')
        self.assertEqual(rc, 3)
        self.assertEqual(out, self.golden('verify_levi_flat.json', 'levi_flat'))

    def test_real(self):
        out, rc = self.run_cr('real', spec('heisenberg'), '--f', '7')
        self.assertEqual(rc, 0)
        self.assertEqual(out, self.golden('real_heisenberg.txt', 'heisenberg'))

    def test_finite_type_levi_flat(self):
        out, rc = self.run_cr('finite-type', spec('levi_flat'), '--max-depth', '6')
        self.assertEqual(rc, 0)
        self.assertEqual(out, self.golden('finite_type_levi_flat.txt', 'levi_flat'))

    def test_finite_type_tube(self):
        out, rc = self.run_cr('finite-type', spec('tube_k2'), '--max-depth', '4')
        self.assertEqual(rc, 0)
        self.assertEqual(out, self.golden('finite_type_tube_k2.txt', 'tube_k2'))

    def test_defect(self):
        out, rc = self.run_cr('defect', spec('heisenberg'), '--f', 'w1')
        self.assertEqual(rc, 0)
        self.assertEqual(out, self.golden('defect_heisenberg.txt', 'heisenberg'))

    def test_eval_oracle(self):
        out, rc = self.run_cr('eval-oracle', spec('heisenberg'), '--points', '5', '--f', 'w1')
        self.assertEqual(rc, 0)
        self.assertEqual(out, self.golden('eval_oracle_heisenberg.txt', 'heisenberg'))

    def test_fuzz(self):
        out, rc = self.run_cr('fuzz', spec('heisenberg'), '--mode', 'proportional',
                              '--trials', '5', '--seed', '4')
        self.assertEqual(rc, 0)
        self.assertEqual(out, self.golden('fuzz_heisenberg.txt', 'heisenberg'))


class CommandOutcomeTests(CrCommandTestCase):
    def test_defect_zero(self):
        out, rc = self.run_cr('defect', spec('heisenberg'), '--f', '3 + z1', '--g', '(3 + z1)*2')
        self.assertEqual(rc, 0)
        self.assertIn('outcome: zero', out)
        self.assertIn('witness: none', out)

    def test_insufficient_precision(self):
        out, rc = self.run_cr('verify', spec('heisenberg'), '--order', '4',
                              '--f', '2*z1^3', '--g', 'z1^3')
        self.assertEqual(rc, 4)
        self.assertIn('outcome: insufficient_precision', out)
        self.assertIn('stage: first_order_identities', out)

    def test_fuzz_rejected_model(self):
        _, rc = self.run_cr('fuzz', spec('real_coefficient'), '--trials', '1')
        self.assertEqual(rc, 2)

    @mock.patch('cr_app.services.LemmaService.verify_lemma',
                side_effect=CertificationError('ratio trace disagrees'))
    def test_certification_failure_is_not_a_usage_error(self, _):
        with self.assertRaises(CommandError) as ctx:
            call_command('cr', 'verify', spec('heisenberg'), '--f', 'w1',
                         stdout=StringIO(), stderr=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('certification failed', str(ctx.exception))

    @mock.patch('cr_app.services.LemmaService.verify_lemma',
                side_effect=CertificationError('ratio trace disagrees'))
    def test_fuzz_reports_failed_trials(self, _):
        out, rc = self.run_cr('fuzz', spec('heisenberg'), '--mode', 'proportional', '--trials', '2')
        self.assertEqual(rc, 2)
        self.assertIn('outcome: failed', out)
        self.assertIn('  - outcome: errors, count: 2', out)
        self.assertIn('first_error: trial 0: ratio trace disagrees', out)


class UsageErrorTests(CrCommandTestCase):
    def test_missing_file(self):
        out, rc = self.run_cr('check', str(SPECS / 'missing.spec'))
        self.assertEqual(rc, 1)
        self.assertEqual(out, '')

    def test_bad_expression(self):
        with self.assertRaisesMessage(CommandError, "unexpected 'w1' at position 3"):
            call_command('cr', 'verify', spec('heisenberg'), '--f', 'z1 w1', stdout=StringIO())

    def test_missing_numerator(self):
        _, rc = self.run_cr('verify', spec('heisenberg'))
        self.assertEqual(rc, 1)

    def test_zero_denominator(self):
        _, rc = self.run_cr('verify', spec('heisenberg'), '--f', '1', '--g', '0')
        self.assertEqual(rc, 1)

    def test_bad_depth(self):
        _, rc = self.run_cr('finite-type', spec('heisenberg'), '--max-depth', '0')
        self.assertEqual(rc, 1)

    def test_missing_spec_argument(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('cr', 'verify', stdout=StringIO(), stderr=StringIO())
        self.assertEqual(ctx.exception.returncode, 1)
