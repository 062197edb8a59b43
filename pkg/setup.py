#!/usr/bin/env python
# -*- coding: utf-8 -*-

from __future__ import unicode_literals

from setuptools import setup
from setuptools import find_packages

from pyposeflow import __version__


setup(
        name='pyposeflow',
        version=__version__,
        description='Ancestor-conditioned SO(3) flows for probabilistic pose and shape estimation',
        license='BSD',
        install_requires=(
            'torch>=1.10',
            'numpy',
            'decorator',
            'tqdm',
            ),
        extras_require={
            'test': ('pytest', 'hypothesis', 'scipy', ),
            },
        packages=find_packages(exclude=['tests', ]),
        package_data={
            'pyposeflow': ['data/skeleton.json', ],
            },
        entry_points={
            'console_scripts': [
                'pyposeflow = pyposeflow.cli:main',
                ],
            },
        classifiers=[
            'Development Status :: 2 - Pre-Alpha',
            'Intended Audience :: Science/Research',
            'License :: OSI Approved :: BSD License',
            'Operating System :: OS Independent',
            'Programming Language :: Python :: 3',
            'Programming Language :: Python :: Implementation :: CPython',
            'Topic :: Scientific/Engineering :: Artificial Intelligence',
            'Topic :: Software Development :: Libraries :: Python Modules',
            ],
        zip_safe=False,
        )


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
