"""qpi URL Configuration

The report service is read-mostly: bundled scenarios and recorded runs.
"""
from django.urls import path, include

urlpatterns = [
        path('scenarios', include('simulator.urls')),
        path('runs', include('experiments.urls')),
]
