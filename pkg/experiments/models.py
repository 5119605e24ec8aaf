from django.db import models

class Run(models.Model):
    scenario_name = models.CharField(max_length=100)
    seed          = models.IntegerField()
    report        = models.JSONField()
    created_at    = models.DateTimeField(auto_now_add=True)

    class Meta:
        db_table = 'runs'

    @classmethod
    def record(cls, report):
        return cls.objects.create(scenario_name=report.scenario_name, seed=report.seed, report=report.as_dict())
