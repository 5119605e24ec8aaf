from django.core.management.base import BaseCommand

from experiments.runner  import compare
from experiments.utils   import parse_list, reports_errors
from simulator.scenarios import resolve_scenario


class Command(BaseCommand):
    help = 'Run a scenario once per seed and write mean and standard deviation of every metric to compare.csv.'

    def add_arguments(self, parser):
        parser.add_argument('--scenario', required=True, help='scenario file, or the name of a bundled scenario')
        parser.add_argument('--seeds', required=True, help='seeds, comma separated')
        parser.add_argument('--out', required=True, help='output directory')

    @reports_errors
    def handle(self, *args, **options):
        seeds    = parse_list(options['seeds'], int)
        scenario = resolve_scenario(options['scenario'])
        rows, _  = compare(scenario, seeds, out_dir=options['out'])

        for row in rows:
            if row['metric'] == 'terminal_error_m':
                self.stdout.write(f'{row["estimator"]}: terminal mass error {row["mean"]:.4f} ± {row["std"]:.4f} kg')
