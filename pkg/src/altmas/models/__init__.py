"""Configuration models for altmas."""

from .experiment import ExperimentConfig, SurrogateSettings, load_config, load_pool

__all__ = ["ExperimentConfig", "SurrogateSettings", "load_config", "load_pool"]
