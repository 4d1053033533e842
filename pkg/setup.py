import os
import sys

from setuptools import setup, find_packages


def readme():
    with open('README.md') as f:
        return f.read()


# Publish Helper.
if sys.argv[-1] == 'publish':
    os.system('python setup.py sdist upload')
    sys.exit()

setup(name='kropina_geodesics',
      version='0.1.0',
      description='Kropina geodesics, Fefferman null lifts and CR chains.',
      long_description=readme(),
      keywords='kropina finsler cr-geometry chains geodesics',
      license='MIT',
      packages=find_packages(exclude=['tests', 'test*']),
      package_data={'kropina_geodesics': ['tests/data/*.cfg']},
      install_requires=[
          'numpy>=1.17',
          'scipy>=1.6',
      ],
      entry_points={
          'console_scripts': ['kropina = kropina_geodesics.cli:main'],
      },
      test_suite='nose2.collector.collector',
      tests_require=['nose2', 'mox3'],
      include_package_data=True,
      zip_safe=False)
