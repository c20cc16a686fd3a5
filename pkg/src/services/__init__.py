# Pipeline bounded contexts
