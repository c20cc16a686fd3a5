# Theme discovery
