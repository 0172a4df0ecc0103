# -*- coding: utf-8 -*-
import sys

from cardioquant.cli import main

sys.exit(main())
