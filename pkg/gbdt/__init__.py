# GBDT Explicit - Bäcklund-Darboux constructions for integrable systems
__version__ = "1.0.0"
