//! Bytecode-to-SSA decompilation pipeline.
//!
//! The passes run in a fixed order: raw block construction, jump resolution
//! by abstract stack simulation, subroutine inlining (context sensitivity),
//! SSA lifting, method discovery, then partial evaluation interleaved with
//! jump re-resolution, dead-code elimination, and join-point computation.

pub mod inline;
pub mod joins;
pub mod methods;
pub mod optimize;
pub mod raw;
pub mod ssa;

use thiserror::Error;

use crate::evm::decode::CodeImage;
use crate::ir::{Cfg, Exit, JumpTargets, MethodTable};

#[derive(Clone, Debug)]
pub struct DecompileOptions {
    /// Subroutine inlining rounds; 0 disables inlining.
    pub inline_depth: u32,
    /// Fail instead of over-approximating unresolved jump targets.
    pub strict_jumps: bool,
}

impl Default for DecompileOptions {
    fn default() -> Self {
        DecompileOptions {
            inline_depth: 2,
            strict_jumps: false,
        }
    }
}

#[derive(Error, Debug)]
pub enum DecompileError {
    #[error("unresolved jump targets remain and strict mode is on")]
    UnresolvedJumps,
}

#[derive(Clone, Debug)]
pub struct Decompiled {
    pub cfg: Cfg,
    pub methods: MethodTable,
}

pub fn decompile(
    image: &CodeImage,
    opts: &DecompileOptions,
) -> Result<Decompiled, DecompileError> {
    if image.opcodes.is_empty() {
        return Ok(Decompiled {
            cfg: Cfg::default(),
            methods: MethodTable::default(),
        });
    }
    let mut raw = raw::build_cfg(image);
    raw::resolve_jumps(&mut raw);
    inline::inline_subroutines(&mut raw, opts.inline_depth);
    if opts.strict_jumps && raw.flags.contains("imprecise-jumps") {
        return Err(DecompileError::UnresolvedJumps);
    }

    let mut cfg = ssa::to_ssa(image, &raw);
    let mut table = methods::identify_methods(&mut cfg);

    for _ in 0..16 {
        let propagated = optimize::propagate_constants(&mut cfg);
        let resolved = optimize::resolve_ssa_jumps(&mut cfg);
        if !propagated && !resolved {
            break;
        }
    }
    optimize::eliminate_unused(&mut cfg);
    let remap = optimize::sweep_unreachable(&mut cfg);

    table.methods = table
        .methods
        .iter()
        .filter_map(|(sel, b)| remap.get(b).map(|nb| (*sel, *nb)))
        .collect();
    table.fallback = table.fallback.and_then(|b| remap.get(&b).copied());

    // the flag may be stale after inlining and re-resolution
    let still_dynamic = cfg.blocks.iter().any(|b| {
        matches!(
            &b.exit,
            Exit::Jump(JumpTargets::Dynamic(_))
                | Exit::Branch {
                    taken: JumpTargets::Dynamic(_),
                    ..
                }
        )
    });
    if still_dynamic {
        cfg.flags.insert("imprecise-jumps".to_string());
    } else {
        cfg.flags.remove("imprecise-jumps");
    }
    if opts.strict_jumps && still_dynamic {
        return Err(DecompileError::UnresolvedJumps);
    }

    joins::compute_join_points(&mut cfg);
    Ok(Decompiled {
        cfg,
        methods: table,
    })
}
