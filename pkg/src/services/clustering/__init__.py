# Opinion clustering
