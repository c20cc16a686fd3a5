# Constrained extraction
