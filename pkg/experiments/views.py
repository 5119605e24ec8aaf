import json

from django.http  import JsonResponse
from django.views import View

from core.exceptions     import QpiError
from experiments.models  import Run
from experiments.runner  import run_experiment
from simulator.scenarios import bundled_scenarios, resolve_scenario


class RunView(View):
    def get(self, request):
        scenario = request.GET.get('scenario', None)
        runs     = Run.objects.order_by('id')

        if scenario:
            runs = runs.filter(scenario_name=scenario)

        result = [{
            "id"         : run.id,
            "scenario"   : run.scenario_name,
            "seed"       : run.seed,
            "created_at" : run.created_at.isoformat(),
        } for run in runs]

        return JsonResponse({"runs": result}, status=200)

    def post(self, request):
        try:
            data = json.loads(request.body)

            if not isinstance(data, dict):
                return JsonResponse({"MESSAGE": "INVALID_JSON"}, status=400)

            name = data['scenario']
            seed = int(data.get('seed', 0))

            if name not in bundled_scenarios():
                return JsonResponse({"MESSAGE": "NO_SCENARIO"}, status=404)

            result = run_experiment(resolve_scenario(name).with_seed(seed))
            run    = Run.record(result.report)

            return JsonResponse({"MESSAGE": "SUCCESS", "id": run.id, "report": run.report}, status=201)

        except json.JSONDecodeError:
            return JsonResponse({"MESSAGE": "INVALID_JSON"}, status=400)

        except KeyError:
            return JsonResponse({"MESSAGE": "KEY_ERROR"}, status=400)

        except (TypeError, ValueError):
            return JsonResponse({"MESSAGE": "INVALID_SEED"}, status=400)

        except QpiError as error:
            return JsonResponse({"MESSAGE": error.code}, status=400)


class RunDetailView(View):
    def get(self, request, run_id):
        try:
            run = Run.objects.get(id=run_id)

        except Run.DoesNotExist:
            return JsonResponse({"MESSAGE": "NO_RUN"}, status=404)

        result = {
            "id"         : run.id,
            "scenario"   : run.scenario_name,
            "seed"       : run.seed,
            "created_at" : run.created_at.isoformat(),
            "report"     : run.report,
        }

        return JsonResponse({"run": result}, status=200)
