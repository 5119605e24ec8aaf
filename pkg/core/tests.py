import os, tempfile

from django.core.handlers.wsgi import WSGIHandler
from django.test               import SimpleTestCase

from core.exceptions import InfeasibleStanceError, RankError, ScenarioError, UsageError
from core.utils      import atomic_write, timed


class ErrorTest(SimpleTestCase):
    def test_context_is_rendered(self):
        error = ScenarioError('invalid JSON', path='broken.json', line=3)

        self.assertEqual(str(error), 'invalid JSON (path=broken.json, line=3)')
        self.assertEqual(error.exit_code, 2)

    def test_tick_is_attached(self):
        error = InfeasibleStanceError('negative normal force').at_tick(42)

        self.assertEqual(error.context['tick'], 42)
        self.assertEqual(str(error), 'negative normal force (tick=42)')
        self.assertEqual((error.code, error.exit_code), ('INFEASIBLE_STANCE', 3))

    def test_exit_codes(self):
        self.assertEqual(RankError('rank deficient', rank=2).exit_code, 4)
        self.assertEqual(UsageError('bad value').exit_code, 2)


class TimedTest(SimpleTestCase):
    def test_logs_the_elapsed_time(self):
        @timed
        def double(value):
            return 2 * value

        with self.assertLogs('core.utils', level='INFO') as logs:
            result = double(21)

        self.assertEqual(result, 42)
        self.assertIn('Function : double finished in', logs.output[0])


class AtomicWriteTest(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.path      = os.path.join(self.directory.name, 'nested', 'trace.csv')

    def tearDown(self):
        self.directory.cleanup()

    def test_file_appears_on_success(self):
        with atomic_write(self.path) as handle:
            handle.write('a,b\r\n')

        with open(self.path, newline='', encoding='utf-8') as handle:
            self.assertEqual(handle.read(), 'a,b\r\n')

    def test_nothing_is_left_behind_on_failure(self):
        with self.assertRaises(RuntimeError):
            with atomic_write(self.path) as handle:
                handle.write('partial')
                raise RuntimeError('interrupted')

        self.assertEqual(os.listdir(os.path.dirname(self.path)), [])

    def test_existing_file_survives_a_failed_write(self):
        with atomic_write(self.path) as handle:
            handle.write('old')

        with self.assertRaises(RuntimeError):
            with atomic_write(self.path) as handle:
                handle.write('new')
                raise RuntimeError('interrupted')

        with open(self.path, encoding='utf-8') as handle:
            self.assertEqual(handle.read(), 'old')


class WsgiTest(SimpleTestCase):
    def test_application_serves_the_report_urls(self):
        from qpi.wsgi import application

        self.assertIsInstance(application, WSGIHandler)
        self.assertEqual(self.client.get('/scenarios').status_code, 200)
