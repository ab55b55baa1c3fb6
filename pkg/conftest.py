import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'idmodds.settings.dev')
django.setup()
