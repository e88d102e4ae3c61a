"""Toolkit for discoverable, auditable open source hardware documentation.

Subpackages cover the manifest data model, documentation compliance
checking, crawling, the searchable registry index, the community review
workflow, and the CLI/HTTP service that ties them together.
"""

__version__ = "0.1.0"
