"""Setuptools for HYPSHRINK."""

# Copyright 2023 Google LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import pathlib
from setuptools import setup, find_packages

here = pathlib.Path(__file__).parent.resolve()

long_description = (here / 'README.md').read_text(encoding='utf-8')

setup(
    name='hypshrink',
    version='1.0.0',
    description='Shrinking target and orbit statistics experiments on \
      hyperbolic manifolds',
    long_description=long_description,
    long_description_content_type='text/markdown',
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
    ],
    keywords='hyperbolic, shrinking target, borel-cantelli, ergodic, lattice',
    package_dir={'':'src'},
    packages=find_packages(where='src'),
    package_data={'': ['.hypshrinkrc']},
    install_requires=[
        'numpy>=1.22',
        'scipy>=1.8',
        'rich==13.2.0',
    ],
    extras_require={
        'test': ['pytest>=7.0'],
    },
    entry_points={
        'console_scripts': ['hypshrink=hypshrink.cli:main'],
    },
    python_requires='>=3.8, <4',
)
