# Spectral and integrable systems built on the GBDT engine
