from django.core.management.base import BaseCommand

from experiments.runner  import SWEEP_PARAMETERS, sweep
from experiments.utils   import parse_list, reports_errors
from simulator.scenarios import resolve_scenario


class Command(BaseCommand):
    help = 'Run a scenario once per value of one parameter and write the metrics to sweep.csv.'

    def add_arguments(self, parser):
        parser.add_argument('--scenario', required=True, help='scenario file, or the name of a bundled scenario')
        parser.add_argument('--param', required=True, choices=SWEEP_PARAMETERS)
        parser.add_argument('--values', required=True, help='values, comma separated')
        parser.add_argument('--seed', type=int, default=None, help='overrides noise.seed of the scenario')
        parser.add_argument('--out', required=True, help='output directory')

    @reports_errors
    def handle(self, *args, **options):
        scenario = resolve_scenario(options['scenario'])
        rows     = sweep(scenario, options['param'], parse_list(options['values']), options['seed'], options['out'])

        self.stdout.write(f'{len(rows)} results written for {options["param"]}')
