"""Numerical core: geometry, clustering, pattern matrix, topic models and metrics"""
