app_name = "vad_vae"
app_title = "VAD-VAE"
app_publisher = "vad_vae contributors"
app_description = "VAD-disentangled variational autoencoder for emotion recognition in conversations"
app_license = "mit"

# Commands
# --------
# Subcommand -> handler called with the parsed argparse namespace

command_hooks = {
	"train": "vad_vae.vad_vae.handlers.train.train_command",
	"eval": "vad_vae.vad_vae.handlers.evaluate.eval_command",
	"gen-data": "vad_vae.vad_vae.handlers.gen_data.gen_data_command",
	"sweep": "vad_vae.vad_vae.handlers.sweep.sweep_command",
	"mi-probe": "vad_vae.vad_vae.handlers.mi_probe.mi_probe_command",
	"export-latents": "vad_vae.vad_vae.handlers.latents.export_latents_command",
	"swap-demo": "vad_vae.vad_vae.handlers.swap_demo.swap_demo_command",
}
