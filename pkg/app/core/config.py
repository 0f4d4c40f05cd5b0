from typing import Optional
from pydantic import ConfigDict
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    model_config = ConfigDict(env_file=".env", extra="ignore")

    log_level: str = "INFO"
    log_dir: str = "logs"
    output_root: str = "runs"  # Default root for experiment records (OUTPUT_ROOT)
    default_seed: int = 1234
    train_budget: int = 2000
    train_restarts: int = 10
    n_workers: int = 1  # Process pool size for training restarts
    active_experiments: Optional[str] = None  # Comma-separated experiment names


def get_settings() -> Settings:
    return Settings()
