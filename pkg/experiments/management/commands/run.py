from django.conf                 import settings
from django.core.management.base import BaseCommand

from experiments.models  import Run
from experiments.runner  import run_experiment
from experiments.utils   import reports_errors
from simulator.scenarios import resolve_scenario


class Command(BaseCommand):
    help = 'Run one scenario through the adaptation pipeline and the RLS baseline and write trace.csv and report.txt.'

    def add_arguments(self, parser):
        parser.add_argument('--scenario', required=True, help='scenario file, or the name of a bundled scenario')
        parser.add_argument('--seed', type=int, default=None, help='overrides noise.seed of the scenario')
        parser.add_argument('--out', required=True, help='output directory')
        parser.add_argument('--snapshots', action='store_true', help='also write the noisy stream to snapshots.csv')
        parser.add_argument('--record', action='store_true', help='store the report in the runs table')

    @reports_errors
    def handle(self, *args, **options):
        scenario = resolve_scenario(options['scenario']).with_seed(options['seed'])
        result   = run_experiment(scenario, out_dir=options['out'], snapshots=options['snapshots'])

        if options['record'] or settings.QPI['RECORD_RUNS']:
            Run.record(result.report)

        published = result.report.tracks['published']
        self.stdout.write(
            f'{scenario.name} (seed {scenario.noise.seed}): terminal mass error '
            f'{published.terminal_error["m"]:.4f} kg, duty cycle {published.duty_cycle:.3f}'
        )
