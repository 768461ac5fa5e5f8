"""Retrieval kernel selection.

Imports the compiled kernel when available, otherwise the pure-Python
fallback.  Set FPBS_PURE_PYTHON=1 to force the fallback (used by the
parity tests and the benchmark).
"""

from __future__ import annotations

import os

if os.environ.get("FPBS_PURE_PYTHON") == "1":
    from fpbs._retrieval_py import BACKEND, greedy_retrieve
else:
    try:
        from fpbs._retrieval_c import BACKEND, greedy_retrieve  # type: ignore
    except ImportError:
        from fpbs._retrieval_py import BACKEND, greedy_retrieve

__all__ = ["BACKEND", "greedy_retrieve"]
