from django.urls       import path

from experiments.views import RunDetailView, RunView

urlpatterns = [
    path("", RunView.as_view()),
    path("/<int:run_id>", RunDetailView.as_view()),
]
