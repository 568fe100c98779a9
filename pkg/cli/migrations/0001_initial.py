import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='Run',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(max_length=32)),
                ('config', models.JSONField()),
                ('version', models.CharField(max_length=16)),
                ('exit_code', models.IntegerField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at', '-pk'],
            },
        ),
        migrations.CreateModel(
            name='ConnectionRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('family', models.CharField(max_length=16)),
                ('parameter_star', models.FloatField()),
                ('bracket_low', models.FloatField()),
                ('bracket_high', models.FloatField()),
                ('oscillations', models.IntegerField()),
                ('q1_signature', models.BooleanField(default=False)),
                ('profile_file', models.CharField(blank=True, max_length=255)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='connections',
                                          to='cli.run')),
            ],
        ),
        migrations.CreateModel(
            name='ShotRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('family', models.CharField(max_length=16)),
                ('parameter', models.FloatField()),
                ('n_max', models.IntegerField()),
                ('n_min', models.IntegerField()),
                ('fate', models.CharField(max_length=32)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='shots',
                                          to='cli.run')),
            ],
            options={
                'ordering': ['run', 'pk'],
            },
        ),
    ]
