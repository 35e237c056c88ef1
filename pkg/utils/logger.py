"""
Logging Configuration Module
Provides centralized logging setup for the Time-Change Lab.
"""

import logging
import sys
from pathlib import Path
from typing import Optional
import config


def setup_logger(
    name: str = "tclab",
    level: str = None,
    log_file: str = None,
    console_output: bool = True
) -> logging.Logger:
    """
    Set up a configured logger for the application.

    Args:
        name: Logger name
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Path to log file (if None, uses config.LOG_FILE; "" disables it)
        console_output: Whether to output logs to console

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)

    level = level or config.LOG_LEVEL
    logger.setLevel(getattr(logging, level.upper()))

    # Clear existing handlers
    logger.handlers.clear()

    detailed_formatter = logging.Formatter(
        fmt='%(asctime)s | %(name)s | %(levelname)-8s | %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    simple_formatter = logging.Formatter(
        fmt='%(levelname)-8s | %(message)s'
    )

    if console_output:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(logging.INFO)
        console_handler.setFormatter(simple_formatter)
        logger.addHandler(console_handler)

    log_file = config.LOG_FILE if log_file is None else log_file
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(detailed_formatter)
        logger.addHandler(file_handler)

    # Prevent propagation to root logger
    logger.propagate = False

    return logger


def get_logger(name: str = "tclab") -> logging.Logger:
    """
    Get an existing logger or create a new one.

    Child loggers ("tclab.potential", ...) share the handlers of the
    "tclab" root logger once it has been set up.

    Args:
        name: Logger name

    Returns:
        Logger instance
    """
    root = logging.getLogger("tclab")
    if not root.handlers:
        setup_logger("tclab", log_file="", console_output=True)

    return logging.getLogger(name)


class LabLogger:
    """
    Specialized logger for lab runs: checks, experiments and estimates.
    """

    def __init__(self, name: str = "tclab.lab"):
        self.logger = get_logger(name)
        self.check_count = 0
        self.failures = 0

    def log_check(self, name: str, passed: bool, residual: Optional[float] = None):
        """
        Log the outcome of a structural check.

        Args:
            name: Check name
            passed: Whether the check passed
            residual: Worst residual observed (optional)
        """
        self.check_count += 1
        status = "PASS" if passed else "FAIL"

        msg = f"CHECK #{self.check_count} | {name}: {status}"
        if residual is not None:
            msg += f" (residual {residual:.3e})"

        if passed:
            self.logger.info(msg)
        else:
            self.failures += 1
            self.logger.warning(msg)

    def log_experiment(self, theorem: str, n: int, sup_error: float, param: str = None):
        """
        Log one row of a convergence experiment.

        Args:
            theorem: Theorem or experiment name
            n: Sequence index
            sup_error: Sup-norm error for this index
            param: Parameter label (optional)
        """
        msg = f"EXPERIMENT | {theorem} | n={n} | sup_error={sup_error:.3e}"
        if param:
            msg += f" | {param}"
        self.logger.debug(msg)

    def log_verdict(self, theorem: str, converged: bool, slope: Optional[float] = None):
        """
        Log the convergence verdict of an experiment.

        Args:
            theorem: Theorem or experiment name
            converged: Verdict
            slope: Fitted log-log slope (optional)
        """
        msg = f"VERDICT | {theorem}: {'converged' if converged else 'NOT converged'}"
        if slope is not None:
            msg += f" | slope {slope:+.3f}"

        if converged:
            self.logger.info(msg)
        else:
            self.logger.warning(msg)

    def log_estimate(self, quantity: str, exact: float, estimate: float, stderr: float):
        """
        Log a Monte Carlo estimate against its exact value.

        Args:
            quantity: Quantity label
            exact: Exact value
            estimate: Monte Carlo estimate
            stderr: Standard error of the estimate
        """
        z = 0.0 if stderr == 0 else (estimate - exact) / stderr
        self.logger.info(
            f"ESTIMATE | {quantity} | exact={exact:.6f} | mc={estimate:.6f} "
            f"± {stderr:.2e} | z={z:+.2f}"
        )

    def log_error(self, error: Exception, context: str = None):
        """
        Log an error with context.

        Args:
            error: Exception object
            context: Additional context about the error
        """
        msg = f"ERROR | {type(error).__name__}: {str(error)}"

        if context:
            msg = f"{context} | {msg}"

        self.logger.error(msg)


if __name__ == "__main__":
    print("=" * 60)
    print("🧪 Lab Logger Test")
    print("=" * 60)

    logger = setup_logger("tclab", log_file="")
    logger.info("This is an info message")
    logger.warning("This is a warning message")

    lab_logger = LabLogger("tclab.test")
    lab_logger.log_check("resolvent identity", True, 3.2e-15)
    lab_logger.log_experiment("potential", 8, 0.125)
    lab_logger.log_verdict("potential", True, -1.01)
    lab_logger.log_estimate("P_t u(x=1)", 0.1116, 0.1119, 0.0008)

    print("\n✅ Logger test completed!")
