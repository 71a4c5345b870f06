"""Data plumbing: ingestion, synthetic data and table output"""
