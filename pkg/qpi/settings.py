"""
Django settings for qpi project.

Online identification of a legged robot's mass and center of mass. Everything the
estimators, the adaptation pipeline and the simulator need as a default lives in the
``QPI`` dictionary at the bottom of this file; scenario files override it per run.

For more information on this file, see
https://docs.djangoproject.com/en/4.2/topics/settings/
"""

import os

from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('QPI_SECRET_KEY', 'qpi-development-key-not-for-deployment')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get('QPI_DEBUG', 'true').lower() == 'true'

ALLOWED_HOSTS = ['*']


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'core',
    'dynamics',
    'estimators',
    'adaptation',
    'simulator',
    'experiments',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.middleware.common.CommonMiddleware',
]

ROOT_URLCONF = 'qpi.urls'

WSGI_APPLICATION = 'qpi.wsgi.application'


# Database
# https://docs.djangoproject.com/en/4.2/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE' : 'django.db.backends.sqlite3',
        'NAME'   : BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

#REMOVE_APPEND_SLASH_WARNING
APPEND_SLASH = False


##LOGGING
LOG_LEVELS = {'error': 'ERROR', 'info': 'INFO', 'debug': 'DEBUG'}
LOG_LEVEL  = LOG_LEVELS.get(os.environ.get('QPI_LOG', 'info').lower(), 'INFO')

LOGGING = {
    'version'                  : 1,
    'disable_existing_loggers' : False,
    'formatters' : {
        'verbose' : {
            'format' : '{asctime} {levelname} {name} {message}',
            'style'  : '{',
        },
    },
    'handlers' : {
        'console' : {
            'class'     : 'logging.StreamHandler',
            'formatter' : 'verbose',
        },
    },
    'loggers' : {
        app : {
            'handlers'  : ['console'],
            'level'     : LOG_LEVEL,
            'propagate' : False,
        } for app in ['core', 'dynamics', 'estimators', 'adaptation', 'simulator', 'experiments']
    },
}


##QPI
QPI = {
    'GRAVITY' : [0.0, 0.0, 9.81],

    'KF' : {
        'Q'   : [5e-3, 5e-4, 5e-4],
        'R'   : [1e3, 1e3, 1e4, 1e4, 1e4, 1e3],
        'P0'  : [1.0, 0.2, 0.2],
        'PI0' : [16.21, 0.142648, 0.0],
    },

    'RLS' : {
        'FORGETTING' : 0.8,
        'P0'         : 100.0,
    },

    'ADAPTATION' : {
        'THRESHOLDS'         : [0.695, 0.12, 0.11],
        'LEG_CONTRIBUTION'   : [0.0, 0.0, 0.0],
        'PUBLISH_POLICY'     : 'all-below',
        'LATCHED'            : False,
        'SKIP_WHEN_AIRBORNE' : False,
        'STANDING_R_SCALE'   : 50.0,
    },

    'LEGS' : {
        'LINK_LENGTHS'    : [0.0955, 0.213, 0.213],
        'HIP_X'           : 0.1934,
        'HIP_Y'           : 0.0465,
        'STANDING_CONFIG' : [0.0, 0.8, -1.6],
        'CONDITION_CAP'   : 1e6,
    },

    'SIMULATOR' : {
        'FORCE_NOISE_STD'     : 5.0,
        'POSITION_NOISE_STD'  : 0.002,
        'ACCEL_NOISE_STD'     : 0.3,
        'STANDING_FORCE_BIAS' : [0.0, 0.0, 4.0],
        'SWING_APEX'          : 0.05,
        'BOB_AMPLITUDE'       : 0.02,
        'PHASE_DURATION'      : 0.35,
        'TICK_RATE'           : 100.0,
        'SCENARIO_DIR'        : BASE_DIR / 'simulator' / 'scenarios',
    },

    'RECORD_RUNS' : False,
}
