import logging

from quench_accel.utils.logger import setup_logger


def test_file_logger_creates_directory_and_writes(tmp_path):
    log_file = tmp_path / 'logs' / 'run.log'
    logger = setup_logger('test_logger.file', str(log_file))
    logger.info("integration finished")
    for handler in logger.handlers:
        handler.flush()
    assert 'INFO - integration finished' in log_file.read_text()
    assert not logger.propagate


def test_repeated_setup_keeps_one_handler():
    first = setup_logger('test_logger.repeat')
    second = setup_logger('test_logger.repeat', level=logging.DEBUG)
    assert first is second
    assert len(second.handlers) == 1
    assert second.level == logging.DEBUG
    assert isinstance(second.handlers[0], logging.StreamHandler)
