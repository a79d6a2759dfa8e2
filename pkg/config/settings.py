"""
Configuration Management
Centralized configuration with environment variable validation
"""

import os
import logging
from typing import Optional
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config:
    """Application configuration class"""

    # Flask Configuration
    DEBUG: bool = os.getenv('DEBUG', 'False').lower() == 'true'
    HOST: str = os.getenv('HOST', 'localhost')
    PORT: int = int(os.getenv('PORT', '5000'))

    # Output Configuration
    RESULTS_DIR: str = os.getenv('RESULTS_DIR', 'results')

    # Logging Configuration
    LOG_LEVEL: str = os.getenv('LOG_LEVEL', 'INFO').upper()
    LOG_FORMAT: str = os.getenv('LOG_FORMAT',
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    LOG_FILE: Optional[str] = os.getenv('LOG_FILE', '').strip("'\"") or None

    # Channel defaults
    DEFAULT_WAVELENGTH: float = float(os.getenv('DEFAULT_WAVELENGTH', '0.01'))
    DEFAULT_SNAPSHOTS: int = int(os.getenv('DEFAULT_SNAPSHOTS', '100'))
    DEFAULT_SNR_DB: float = float(os.getenv('DEFAULT_SNR_DB', '20'))

    # Dictionary / grid defaults
    PD_BETA: float = float(os.getenv('PD_BETA', '1.55'))
    PD_ANGLE_OVERSAMPLING: int = int(os.getenv('PD_ANGLE_OVERSAMPLING', '1'))
    TPD_DISTANCE_LEVELS: int = int(os.getenv('TPD_DISTANCE_LEVELS', '0'))  # 0 -> max(n_h, n_v)
    GRID_R_MIN_FRESNEL_RATIO: float = float(os.getenv('GRID_R_MIN_FRESNEL_RATIO', '0.5'))
    DICTIONARY_MEMORY_LIMIT_MB: float = float(os.getenv('DICTIONARY_MEMORY_LIMIT_MB', '4096'))

    # Solver tuning
    MUSIC_CONFIDENCE_RATIO: float = float(os.getenv('MUSIC_CONFIDENCE_RATIO', '10'))
    REFINE_MAX_CYCLES: int = int(os.getenv('REFINE_MAX_CYCLES', '20'))
    REFINE_TOLERANCE: float = float(os.getenv('REFINE_TOLERANCE', '1e-6'))

    # Execution
    MAX_WORKERS: int = int(os.getenv('MAX_WORKERS', '1'))

    @classmethod
    def validate_settings(cls) -> dict:
        """Validate numeric settings that every command relies on"""
        validation_results = {
            'wavelength': cls.DEFAULT_WAVELENGTH > 0,
            'snapshots': cls.DEFAULT_SNAPSHOTS >= 1,
            'pd_beta': cls.PD_BETA > 0,
            'pd_angle_oversampling': cls.PD_ANGLE_OVERSAMPLING >= 1,
            'tpd_distance_levels': cls.TPD_DISTANCE_LEVELS >= 0,
            'grid_r_min': cls.GRID_R_MIN_FRESNEL_RATIO > 0,
            'dictionary_memory': cls.DICTIONARY_MEMORY_LIMIT_MB > 0,
            'refine_cycles': cls.REFINE_MAX_CYCLES >= 1,
            'workers': cls.MAX_WORKERS >= 1,
        }
        return validation_results

    @classmethod
    def get_config_problems(cls) -> list:
        """Get list of settings that failed validation"""
        validation = cls.validate_settings()
        return [key for key, valid in validation.items() if not valid]

    @classmethod
    def is_ready(cls) -> bool:
        """Check if the configuration can drive simulations"""
        return len(cls.get_config_problems()) == 0


def setup_logging(config: Config = None) -> logging.Logger:
    """Setup logging configuration"""
    if config is None:
        config = Config()

    # Set logging level
    log_level = getattr(logging, config.LOG_LEVEL, logging.INFO)

    handlers = [logging.StreamHandler()]
    if config.LOG_FILE:
        handlers.append(logging.FileHandler(config.LOG_FILE, mode='a'))

    # Configure logging
    logging.basicConfig(
        level=log_level,
        format=config.LOG_FORMAT,
        handlers=handlers
    )

    # Create logger
    logger = logging.getLogger('nearfield')
    logger.setLevel(log_level)

    return logger


# Global configuration instance
config = Config()

# Setup logger
logger = setup_logging(config)
