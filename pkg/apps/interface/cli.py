"""
Entry point returning the process exit code instead of exiting.

    python -m apps.interface.cli check --game coop.json --winning-set 0,1

Equivalent to `manage.py ibg ...`; tests call cli_main directly.
"""

import os
import sys
from typing import Optional, Sequence, TextIO


def cli_main(argv: Sequence[str], stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')
    import django
    from django.apps import apps

    if not apps.ready:
        django.setup()

    from django.core.management import call_command
    from django.core.management.base import CommandError

    from apps.interface.management.commands.ibg import INPUT_ERROR, Command

    command = Command(stdout=stdout or sys.stdout, stderr=stderr or sys.stderr)
    try:
        call_command(command, *argv, stdout=stdout or sys.stdout, stderr=stderr or sys.stderr)
    except CommandError as exc:
        command.stderr.write(str(exc))
        # argument errors from the parser carry the default returncode 1
        return exc.returncode if exc.returncode > 1 else INPUT_ERROR
    return command.exit_code


if __name__ == '__main__':
    sys.exit(cli_main(sys.argv[1:]))
