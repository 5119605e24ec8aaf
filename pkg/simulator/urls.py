from django.urls     import path

from simulator.views import ScenarioListView

urlpatterns = [
    path("", ScenarioListView.as_view()),
]
