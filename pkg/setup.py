# -*- coding: utf-8 -*-
from setuptools import setup

with open("README.rst") as rfile:
    long_description = rfile.read()

setup(
    name='cardioquant',
    version='0.1.0',
    author='cardioquant developers',
    packages=['cardioquant', 'cardioquant.plugins', 'cardioquant.objects',
              'cardioquant.models', 'cardioquant.test'],
    license='Creative Common "Attribution" license (CC-BY) v3',
    description=('Left-ventricle quantification workbench: synthetic cardiac '
                 'phantoms, direct and segmentation-based estimators, their '
                 'linear ensemble and a reproducible cross-validation'),
    long_description=long_description,
    python_requires='>=3.7',
    install_requires=['numpy>=1.17', 'scipy>=1.4', 'sqlalchemy>=1.4'],
    extras_require={'test': ['pytest', 'hypothesis']},
    entry_points={'console_scripts': ['cardioquant=cardioquant.cli:main']},
    classifiers=["Development Status :: 3 - Alpha",
                 "Environment :: Console",
                 "Programming Language :: Python :: 3",
                 "Programming Language :: Python :: 3.7",
                 "Programming Language :: Python :: 3.8",
                 "Programming Language :: Python :: 3.9",
                 "Programming Language :: Python :: 3.10",
                 "Topic :: Scientific/Engineering :: Medical Science Apps.",
                 "Topic :: Scientific/Engineering :: Image Recognition"]
)
