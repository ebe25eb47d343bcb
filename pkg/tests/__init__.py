"""Tests Package
Unit tests and integration tests for RsesTrial
"""
