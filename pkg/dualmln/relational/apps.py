from django.apps import AppConfig


class RelationalConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "relational"
    verbose_name = "Relational Engine"
