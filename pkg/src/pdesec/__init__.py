"""Security analysis and attack detection for 1-D linear parabolic PDE systems.

Subpackages:

* :mod:`pdesec.spectral` - cosine-basis forward solver for the plant.
* :mod:`pdesec.stealth` - stealthy-attack synthesis via the Volterra inverse problem.
* :mod:`pdesec.backstepping` - closed-form observer kernels, gains and state transforms.
* :mod:`pdesec.lmi` - detector tuning certificates via 6x6 semidefiniteness conditions.
* :mod:`pdesec.detector` - finite-difference plant/observer co-simulation and detection.
* :mod:`pdesec.casestudy` / :mod:`pdesec.cli` - battery case studies and the command line.
"""

__version__ = "0.1.0"
