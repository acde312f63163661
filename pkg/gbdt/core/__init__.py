# Core linear algebra, realizations, S-nodes and the GBDT engine
from .matcore import CMat, RiccatiForm
from .realization import Realization
from .snode import SNode

__all__ = ["CMat", "Realization", "RiccatiForm", "SNode"]
