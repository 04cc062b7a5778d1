"""
Celery Configuration for the iBG solver.

This module configures Celery for fanning out winning-set queries
(`manage.py ibg enumerate --parallel N`). Without a broker the tasks run
eagerly in-process; with REDIS_URL set they go to workers.

Usage:
    # Start worker
    celery -A config worker -l INFO
"""

import os
from celery import Celery

# Set default Django settings module
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')

# Create Celery app
app = Celery('ibg_solver')

# Load config from Django settings (namespace='CELERY' means all Celery
# settings should be prefixed with CELERY_ in settings.py)
app.config_from_object('django.conf:settings', namespace='CELERY')

# Auto-discover tasks from all installed apps
app.autodiscover_tasks()
