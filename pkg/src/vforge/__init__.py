"""vforge: desk-scale IoT virtualization with ML-assisted concept mapping.

The package pivots heterogeneous source data through a neutral NGSI-LD
entity format into tenant-chosen target flavours, and derives the
source-to-target concept mapping semi-automatically via weakly supervised
ontology matching.
"""

__version__ = "0.1.0"
