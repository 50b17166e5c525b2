"""Integration tests for torusflux"""
