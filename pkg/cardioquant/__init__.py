# -*- coding: utf-8 -*-

__author__ = 'cardioquant developers'
__credits__ = ['cardioquant developers']
__maintainer__ = 'cardioquant developers'
__license__ = 'CC-BY'
__version__ = '0.1.0'
