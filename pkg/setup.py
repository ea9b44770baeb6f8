from setuptools import setup, find_packages
from liuw import VERSION

setup(
    name="python-liuw",
    version='%s.%s.%s' % VERSION,
    description='LiDAR-inertial odometry with UWB and wheel constraints '
                'for degenerate tunnels',
    packages=find_packages(exclude=["tests"]),
    include_package_data=True,
    package_data={'': ['README.md']},
    data_files=[('share/python-liuw', ['resources/default.yaml'])],
    install_requires=['numpy', 'scipy', 'PyYAML'],
    entry_points={'console_scripts': ['liuw=liuw.cli:main']},
    zip_safe=False,
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'Natural Language :: English',
        'Operating System :: POSIX :: Linux',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Topic :: Scientific/Engineering',
    ],
)
