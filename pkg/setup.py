# Copyright 2019-2020 The cavity-lock Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the 'License'). You
# may not use this file except in compliance with the License. A copy of
# the License is located at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# or in the 'license' file accompanying this file. This file is
# distributed on an 'AS IS' BASIS, WITHOUT WARRANTIES OR CONDITIONS OF
# ANY KIND, either express or implied. See the License for the specific
# language governing permissions and limitations under the License.
from __future__ import absolute_import

import os

import setuptools


def read(file_name):
    return open(os.path.join(os.path.dirname(__file__), file_name)).read()


def read_version():
    return read("VERSION").strip()


packages = setuptools.find_packages(where="src", exclude=("test",))

required_packages = ["numpy>=1.17", "scipy>=1.2.2", "psutil==5.4.8", "six"]

setuptools.setup(
    name="cavity-lock",
    version=read_version(),
    description="Steady states, noise spectra and feedback linewidths of coherently driven "
    "atom-cavity frequency references.",
    packages=packages,
    package_dir={"": "src"},
    long_description=read("README.rst"),
    author="The cavity-lock Authors",
    license="Apache License 2.0",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Natural Language :: English",
        "License :: OSI Approved :: Apache Software License",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3.6",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    python_requires=">=3.6",
    install_requires=required_packages,
    extras_require={
        "test": [
            "tox==3.13.1",
            "pytest==4.4.1",
            "pytest-cov",
            "mock",
            "mpmath",
            "black==19.3b0 ; python_version >= '3.6'",
        ]
    },
    entry_points={"console_scripts": ["cavity-lock=cavity_lock.cli.main:main"]},
)
