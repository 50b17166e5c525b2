"""Tests for torusflux"""
