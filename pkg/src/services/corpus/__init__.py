# Review corpus vocabulary
