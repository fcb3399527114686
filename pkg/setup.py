"""A setuptools based setup module.
"""

import pathlib
from setuptools import setup, find_packages

here = pathlib.Path(__file__).parent.resolve()

long_description = (here / 'README.md').read_text(encoding='utf-8')

setup(
    name='netcrt',
    version='0.1.0',
    description='Conditional randomization tests of exposure mappings under network interference',
    long_description=long_description,
    long_description_content_type='text/markdown',
    url='https://github.com/sandflow/netcrt',
    author='Sandflow Consulting LLC',
    author_email='info@sandflow.com',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'Environment :: Console',
        'License :: OSI Approved :: BSD License',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3 :: Only',
        'Topic :: Scientific/Engineering :: Mathematics'
    ],
    keywords='randomization test, interference, exposure mapping, network, causal inference, biclique, permutation',

    package_dir={'netcrt': 'src/main/python/netcrt'},

    packages=find_packages(where='src/main/python'),

    python_requires='>=3.8, <4',

    install_requires=[
        'numpy',
        'scipy',
        'networkx',
        'pandas'
    ],

    project_urls={
        'Bug Reports': 'https://github.com/sandflow/netcrt/issues',
        'Source': 'https://github.com/sandflow/netcrt',
    },

    entry_points={
        "console_scripts": [
            "crt = netcrt.crt:main"
        ]
    },
)
