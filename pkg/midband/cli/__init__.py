from midband.cli.commands import cmd_bands, cmd_coverage, cmd_rfi, cmd_validate
from midband.cli.main import main
