from django.urls import include, path

app_name = "api"
urlpatterns = [
    path("", include("glucose_control.bench.api.urls")),
]
