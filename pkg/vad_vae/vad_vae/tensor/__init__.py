from vad_vae.vad_vae.tensor.tensor import (
	DTYPE,
	Tape,
	Tensor,
	add,
	as_tensor,
	backward,
	clamp,
	concat,
	custom_op,
	detach,
	elementwise,
	exp,
	get_tape,
	log,
	matmul,
	mul,
	neg,
	no_grad,
	ones,
	parameter,
	reduce_mean,
	reduce_sum,
	reduction,
	reshape,
	sigmoid,
	slice_axis,
	softmax_cross_entropy,
	softmax_rows,
	square,
	sub,
	take_rows,
	tanh,
	tensor,
	transpose,
	use_tape,
	zeros,
)
