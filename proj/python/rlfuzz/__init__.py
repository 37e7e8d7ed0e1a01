"""Coverage-guided generative fuzzing framework: python bindings."""

try:
    from ._rlfuzz import *  # noqa: F401,F403  (installed package layout)
except ImportError:
    from _rlfuzz import *  # noqa: F401,F403  (build-tree layout)
