"""Command handlers.

Each `*_command(args)` function is registered in `vad_vae.hooks.command_hooks`
and receives the parsed command-line namespace; the functions without the
suffix are the library entry points they wrap.
"""
