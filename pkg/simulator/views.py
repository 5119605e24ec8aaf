from django.http  import JsonResponse
from django.views import View

from core.exceptions     import ScenarioError
from simulator.scenarios import bundled_scenarios, resolve_scenario


class ScenarioListView(View):
    def get(self, request):
        try:
            scenarios = [resolve_scenario(name) for name in bundled_scenarios()]
        except ScenarioError as error:
            return JsonResponse({"MESSAGE": error.code}, status=400)

        result = [{
            "name"           : scenario.name,
            "duration"       : scenario.duration,
            "tick_rate"      : scenario.tick_rate,
            "gait_timeline"  : [segment.pattern for segment in scenario.gait_timeline],
            "payload_events" : [event.label for event in scenario.payload_events],
            "seed"           : scenario.noise.seed,
        } for scenario in scenarios]

        return JsonResponse({"scenarios": result}, status=200)
