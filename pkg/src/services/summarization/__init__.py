# Summarization
