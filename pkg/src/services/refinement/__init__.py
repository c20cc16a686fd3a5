# Theme refinement
