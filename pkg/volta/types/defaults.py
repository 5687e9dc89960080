class Defaults:
    # latent space sizes used throughout the experiments
    n_zg = 32
    n_cg = 4
    n_za = 20
    n_ca = 5
    categories = 10
    n_latent_slots = 4

    # backbone
    d_model = 64
    n_heads = 4
    n_layers = 2
    max_seq = 64
    init_std = 0.02
    layer_norm_eps = 1e-5

    # objectives
    beta_max = 0.1
    warmup_fraction = 0.25
    gamma = 1.0
    lambda_fb = 1.0
    gumbel_temperature = 1.0

    # optimisation
    learning_rate = 5e-5
    momentum = 0.9
    adam_betas = (0.9, 0.999)
    adam_eps = 1e-8
    batch_size = 8
    epochs = 10
    checkpoint_interval = 0

    # evaluation
    samples_per_context = 5
    au_threshold = 0.01
    bleu_max_n = 4
    max_generation_length = 24

    # tokens
    bos_id = 0
    eos_id = 1
    pad_id = 2
    sep_id = 3
    unk_id = 4
    special_tokens = ['<bos>', '<eos>', '<pad>', '<sep>', '<unk>']

    checkpoint_format_version = 1
    checkpoint_file = 'volta.ckpt'
    last_good_checkpoint_file = 'last_good.ckpt'
    loss_stream_file = 'losses.msgpack'

    grad_check_eps = 1e-4
