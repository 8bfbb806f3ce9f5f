# Generated by Django 4.0.8 on 2024-06-01 12:00

from django.db import migrations, models
import django.db.models.deletion
import django.utils.timezone
import model_utils.fields
import uuid


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('created', model_utils.fields.AutoCreatedField(default=django.utils.timezone.now, editable=False, verbose_name='created')),
                ('modified', model_utils.fields.AutoLastModifiedField(default=django.utils.timezone.now, editable=False, verbose_name='modified')),
                ('uuid', models.UUIDField(default=uuid.uuid4, editable=False, unique=True)),
                ('kind', models.CharField(choices=[('run', 'Sweep'), ('transfer', 'Transfer')], default='run', max_length=16)),
                ('config_hash', models.CharField(db_index=True, max_length=64)),
                ('config', models.JSONField(default=dict)),
                ('output_dir', models.CharField(max_length=1024)),
            ],
            options={
                'ordering': ('-created',),
            },
        ),
        migrations.CreateModel(
            name='MetricsRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('patient', models.CharField(max_length=63)),
                ('controller', models.CharField(max_length=31)),
                ('seed', models.PositiveIntegerField()),
                ('status', models.CharField(choices=[('ok', 'OK'), ('failed', 'Failed')], default='ok', max_length=16)),
                ('tir', models.FloatField(blank=True, null=True)),
                ('time_below_70', models.FloatField(blank=True, null=True)),
                ('time_below_54', models.FloatField(blank=True, null=True)),
                ('time_above_180', models.FloatField(blank=True, null=True)),
                ('mean_bg', models.FloatField(blank=True, null=True)),
                ('eval_days', models.FloatField(blank=True, null=True)),
                ('error', models.TextField(blank=True, default='')),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='metrics', related_query_name='metric', to='bench.experimentrun')),
            ],
            options={
                'ordering': ('patient', 'controller', 'seed'),
            },
        ),
        migrations.AddConstraint(
            model_name='metricsrecord',
            constraint=models.UniqueConstraint(fields=('run', 'patient', 'controller', 'seed'), name='unique_cell_per_run'),
        ),
    ]
