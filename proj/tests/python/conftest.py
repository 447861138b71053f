import os
import sys

import pytest

MODULE_DIR = os.environ.get("PLMFORGE_MODULE_DIR")
if MODULE_DIR and MODULE_DIR not in sys.path:
    sys.path.insert(0, MODULE_DIR)


@pytest.fixture(scope="session")
def plmforge_cli():
    path = os.environ.get("PLMFORGE_CLI")
    if not path or not os.path.exists(path):
        pytest.skip("PLMFORGE_CLI not set; CLI smoke tests need the built binary")
    return path
