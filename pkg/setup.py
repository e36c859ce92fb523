from setuptools import setup, find_packages

setup(
    name='ep_adaptive',
    description='Kurtosis test of a Laplace prior and adaptive exponential power estimation for linear regression',
    author='pietrek',
    packages=find_packages(exclude=('docs', 'examples')),
    setup_requires=[
        'wheel',
        'setuptools',
    ],
    install_requires=[
        'pydantic>=2',
        'numpy',
        'scipy',
        'pandas>=1.5',
    ],
    extras_require={
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': [
            'ep-adaptive=ep_adaptive.cli:main',
        ],
    },
    python_requires='>=3.9',
    include_package_data=False,
    version='0.1.0',
)
